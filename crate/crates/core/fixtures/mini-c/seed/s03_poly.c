float poly(float x, float c0, float c1, float c2) {
  float acc = c2;
  float y = 0.0;
  acc = acc * x + c1;
  acc = acc * x + c0;
  y = acc;
  return y;
}
