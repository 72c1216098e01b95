def gcd(a, b):
    if b == 0:
        return a
    return gcd(b, a % b)

def main_solution(a, b):
    return gcd(a, b)
