int calls(int v, int w) {
  int x = step(v);
  int y = step(w);
  int z = step(x + y);
  return x * y + z;
}
