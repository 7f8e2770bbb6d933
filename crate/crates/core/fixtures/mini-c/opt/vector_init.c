int vector_init(int k) {
  int lut[4] = {1, 2, 4, 8};
  int out[4] = {0, 0, 0, 0};
  for (int i = 0; i < 4; i++) {
    out[i] = lut[i] * k;
  }
  return out[k % 4];
}
