int pick(int a, int b, int flag) {
  int r = 0;
  if (flag > 0) {
    r = a + 10 % b;
  } else {
    r = b - 5 % a;
  }
  return r;
}
