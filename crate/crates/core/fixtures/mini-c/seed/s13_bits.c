unsigned bits(unsigned v) {
  unsigned c = 0;
  while (v != 0) {
    c += v % 2;
    v = v / 2;
  }
  return c;
}
