int total(int x[], int y[], int n) {
  int s = 0;
  for (int i = 0; i < n; i++) {
    s += x[i];
  }
  for (int j = 0; j < n; j++) {
    s -= y[j];
  }
  return s;
}
