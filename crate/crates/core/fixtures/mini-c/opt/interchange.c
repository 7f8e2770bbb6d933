void interchange(int m[256], int n) {
  for (int j = 0; j < n; j++) {
    for (int i = 0; i < n; i++) {
      m[i * n + j] += 1;
    }
  }
}
