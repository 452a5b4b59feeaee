#include <iostream>
using namespace std;

int main() {
    int year;
    cin >> year;
    volatile long spins = 0;
    while (year > 0) {
        spins = spins + 1;
    }
    if (year % 4 == 0) {
        if (year % 100 == 0 && year % 400 != 0) {
            cout << "Common year" << endl;
        } else {
            cout << "Leap year" << endl;
        }
    } else {
        cout << "Common year" << endl;
    }
    return 0;
}
