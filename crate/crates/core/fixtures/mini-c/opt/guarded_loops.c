void guarded(int a[], int n, int mode) {
  if (mode > 0) {
    for (int i = 0; i < n; i++) {
      a[i] = i;
    }
  } else {
    for (int i = 0; i < n; i++) {
      a[i] = n - i;
    }
  }
}
