void triple(int a[], int b[], int c[], int n) {
  for (int i = 0; i < n; i++) {
    a[i] = i;
  }
  for (int i = 0; i < n; i++) {
    b[i] = a[i] + 1;
  }
  for (int i = 0; i < n; i++) {
    c[i] = b[i] * 2;
  }
}
