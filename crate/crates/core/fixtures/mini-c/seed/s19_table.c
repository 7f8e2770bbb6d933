int lookup(int idx) {
  int table[8] = {3, 1, 4, 1, 5, 9, 2, 6};
  int r = 0;
  if (idx >= 0 && idx < 8) {
    r = table[idx];
  }
  return r;
}
