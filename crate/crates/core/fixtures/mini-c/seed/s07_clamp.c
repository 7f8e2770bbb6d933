int clamp(int x, int lo, int hi) {
  int r = x;
  if (x < lo) {
    r = lo;
  }
  if (x > hi) {
    r = hi;
  }
  return r;
}
