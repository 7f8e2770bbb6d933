double dot(double a[], double b[], int n) {
  double s = 0.0;
  double w = 1.0;
  for (int i = 0; i < n; i++) {
    s += a[i] * b[i];
  }
  w = s * 0.5;
  return w;
}
