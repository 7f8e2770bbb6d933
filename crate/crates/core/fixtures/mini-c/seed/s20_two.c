int first(int a) {
  int b = a * 2;
  return b + 1;
}

int second(int a[], int n) {
  int acc = 0;
  for (int i = 0; i < n; i++) {
    acc += a[i] - i;
  }
  return acc;
}
