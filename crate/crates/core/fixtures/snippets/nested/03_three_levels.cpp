if (a) {
    if (b) {
        if (c) { f(); } else { g(); }
    } else {
        h();
    }
} else {
    k();
}
