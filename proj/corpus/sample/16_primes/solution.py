def is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True

def main_solution(limit):
    found = []
    for n in range(2, limit + 1):
        if is_prime(n):
            found.append(n)
    return found
