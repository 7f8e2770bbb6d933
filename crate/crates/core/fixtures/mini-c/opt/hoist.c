int hoist(int a, int b, int c) {
  int r = 0;
  if (c != 0) {
    r = a * b + c;
  } else {
    r = a * b - c;
  }
  return r;
}
