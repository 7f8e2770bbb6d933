void scale(int a[], int b[], int n) {
  for (int i = 0; i < n; i++) {
    a[i] += 1;
  }
  for (int j = 0; j < n; j++) {
    b[j] += 2;
  }
}
