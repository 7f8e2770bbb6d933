void scale(int a[], int b[], int n) {
  for (int i = 0; i < n; i++) {
    a[i] += 1;
    b[i] += 2;
  }
}
