if (year % 4 != 0 || (year % 100 == 0 && year % 400 != 0)) {
    cout << "Common year" << endl;
}
if ((year % 4 == 0 && year % 100 != 0) || (year % 400 == 0)) {
    cout << "Leap year" << endl;
}
