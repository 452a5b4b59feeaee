if (y % 4 == 0) {
    if (y % 100 == 0) { c = 1; } else { c = 2; }
} else {
    c = 0;
}
