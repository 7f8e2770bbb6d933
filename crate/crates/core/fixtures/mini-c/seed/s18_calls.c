int apply(int x, int y) {
  int u = x + y;
  int v = x - y;
  if (u > v) {
    u = helper(u, v);
  }
  return u * v;
}
