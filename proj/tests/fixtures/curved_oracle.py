# Independent oracle: y(t) = argmin 1/2|x|^2 - <(2+t,2),x>  s.t. x1^2 + x2 - 1 <= 0
from mpmath import mp, mpf, findroot, diff
mp.dps = 50
def y(t):
    p1, p2 = 2 + t, mpf(2)
    # x1 = p1/(1+2l), x2 = p2 - l, x2 = 1 - x1^2
    l = findroot(lambda l: p2 - l - 1 + (p1/(1+2*l))**2, mpf('0.5'))
    return (p1/(1+2*l), p2 - l, l)
y0 = y(mpf(0))
print("y0", y0)
# one-sided derivative via high-precision forward difference with Richardson
def d(h): 
    a = y(h); return [(a[i]-y0[i])/h for i in range(2)]
hs = [mpf(10)**-k for k in (20, 21)]
D1, D2 = d(hs[0]), d(hs[1])
print("yprime", [mp.nstr(2*0+D2[i],30) for i in range(2)])
print("yprime_rich", [mp.nstr(D2[i] + (D2[i]-D1[i])/9, 30) for i in range(2)])
