int n = read();
if (n > 0) {
    log(n);
    if (n % 2 == 0) {
        even(n);
    } else {
        odd(n);
    }
    done();
} else {
    zero();
}
cleanup();
