int fuse_sum(int a[], int b[], int n) {
  int s = 0;
  int t = 0;
  for (int i = 0; i < n; i++) {
    s += a[i];
  }
  for (int i = 0; i < n; i++) {
    t += b[i];
  }
  return s + t;
}
