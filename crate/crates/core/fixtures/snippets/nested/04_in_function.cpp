int sign(int v) {
    if (v >= 0) {
        if (v == 0) {
            return 0;
        } else {
            return 1;
        }
    } else {
        return -1;
    }
}
