int max_of(int a[], int n) {
  int best = a[0];
  int i = 1;
  while (i < n) {
    if (a[i] > best) {
      best = a[i];
    }
    i++;
  }
  return best;
}
