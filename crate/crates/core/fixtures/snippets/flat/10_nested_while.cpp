if (a) {
    while (b) { x(); }
} else {
    y();
}
