int trace(int m[64], int n) {
  int t = 0;
  int d = 0;
  for (int i = 0; i < n; i++) {
    t += m[i * n + i];
    d = d + 1;
  }
  return t * d;
}
