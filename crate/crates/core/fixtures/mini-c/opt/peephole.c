int peephole(int a, int b) {
  int x = a + 1;
  int y = x - 1;
  int z = y * 2;
  z = z / 2;
  return z + b;
}
