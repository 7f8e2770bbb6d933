int f(int arr[]) {
  int sum1 = 0;
  int sum2 = 0;
  for (int i = 0; i < 64; i++) {
    sum1 += arr[i];
  }
  return sum1 + sum2;
}
