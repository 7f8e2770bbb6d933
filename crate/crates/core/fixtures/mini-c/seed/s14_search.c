int search(int a[], int n, int key) {
  int found = -1;
  for (int i = 0; i < n; i++) {
    if (a[i] == key) {
      found = i;
      break;
    }
  }
  return found;
}
