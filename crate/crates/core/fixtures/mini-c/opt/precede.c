int precede(int p[], int n) {
  int acc = 0;
  for (int i = 0; i < n; i++) {
    int v = load(p, i);
    acc += v * 3;
    p[i] = acc;
  }
  return acc;
}
