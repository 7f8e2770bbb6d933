void scale(float m[], int n, float k) {
  int half = n / 2;
  for (int i = 0; i < half; i++) {
    m[i] = m[i] * k;
  }
  half = half + 1;
  for (int j = half; j < n; j++) {
    m[j] = m[j] / k;
  }
}
