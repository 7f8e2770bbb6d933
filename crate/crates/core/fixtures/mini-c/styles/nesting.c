int grid(int rows) {
  int total = rows;
  for (int r = 0; r < 8; r++) {
    int acc = 0;
    for (int c = 0; c < 8; c++) {
      acc += r * c;
    }
  }
  return total;
}
