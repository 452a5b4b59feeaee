if (score >= 60) {
    if (score >= 90) { grade = 'A'; }
    else { grade = 'P'; }
}
else { grade = 'F'; }
