void prefix(int a[], int out[], int n) {
  int run = 0;
  for (int i = 0; i < n; i++) {
    run += a[i];
    out[i] = run;
  }
  run = 0;
}
