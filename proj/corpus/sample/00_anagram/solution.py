def main_solution(first, second):
    return sorted(first) == sorted(second)
