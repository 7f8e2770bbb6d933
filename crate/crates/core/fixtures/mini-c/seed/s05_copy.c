void copy(int dst[], int src[], int n) {
  int i = 0;
  do {
    dst[i] = src[i];
    i = i + 1;
  } while (i < n);
}
