def func1(x):
    return x + 1
