void swap_pairs(int a[], int n) {
  int tmp = 0;
  for (int i = 0; i + 1 < n; i += 2) {
    tmp = a[i];
    a[i] = a[i + 1];
    a[i + 1] = tmp;
  }
}
