if (ready)
{
    if (fast)
    {
        run();
    }
    else
    {
        walk();
    }
}
else
{
    wait();
}
