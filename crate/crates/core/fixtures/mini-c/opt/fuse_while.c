void fuse_while(float x[], float y[], int n) {
  int i = 0;
  int j = 0;
  while (i < n) {
    x[i] = x[i] * 2.0;
    i++;
  }
  while (j < n) {
    y[j] = y[j] + 1.5;
    j++;
  }
}
