int flags(int x, int y) {
  int f = 0;
  if (x > 0 && y > 0) {
    f = 1;
  } else {
    if (x < 0 || y < 0) {
      f = 2;
    }
  }
  return f;
}
