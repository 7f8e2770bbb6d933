int count_pos(int v[], int n) {
  int pos = 0;
  int neg = 0;
  for (int k = 0; k < n; k++) {
    if (v[k] > 0) {
      pos += 1;
    } else {
      neg += 1;
    }
  }
  return pos - neg;
}
