long fact(int n) {
  long r = 1;
  int i = 2;
  for (; i <= n; i++) {
    r *= i;
  }
  return r;
}
