int bits(int c) {
  int mask = 0xff00 + 0xff;
  if (c > mask) {
    int t = c;
    c = __builtin_popcount(t);
  }
  return c;
}
