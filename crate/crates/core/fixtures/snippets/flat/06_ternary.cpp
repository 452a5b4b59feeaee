cout << ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0 ? "Leap year" : "Common year") << endl;
