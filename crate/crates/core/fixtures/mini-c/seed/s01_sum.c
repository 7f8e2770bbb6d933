int sum(int a[], int n) {
  int s = 0;
  int c = 0;
  for (int i = 0; i < n; i++) {
    s += a[i];
  }
  c = s / 2;
  return s + c;
}
