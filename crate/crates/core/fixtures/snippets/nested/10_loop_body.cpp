for (int i = 0; i < n; ++i) {
    if (v[i] > 0) {
        if (v[i] > 10) { big++; } else { small++; }
    } else {
        neg++;
    }
}
