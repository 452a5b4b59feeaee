if (m > 0) {
    if (m == 1) { a(); } else if (m == 2) { b(); } else { c(); }
} else {
    d();
}
