if	(x)	{
	if	(y)	{
		p();
	}	else	{
		q();
	}
}	else	{
	r();
}
