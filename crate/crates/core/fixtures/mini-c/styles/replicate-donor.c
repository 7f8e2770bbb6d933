int kernel(int arr[], int SIZE) {
  int magic = 7;
  for (int i = 0; i < SIZE; i++) {
    arr[i] = arr[i] * magic;
  }
  for (int i = 0; i < SIZE; i++) {
    arr[i] = arr[i] + magic;
  }
  return arr[0];
}
