switch (k) {
case 0: a(); break;
default: b(); break;
}
