if (a) { x(); } else { y(); }
if (b) { z(); } else { w(); }
