float mean(float xs[], int n) {
  float total = 0.0;
  float m = 0.0;
  int i = 0;
  while (i < n) {
    total += xs[i];
    i++;
  }
  m = total / n;
  return m;
}
