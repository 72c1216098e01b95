def main_solution(values):
    total = 0
    means = []
    for i, v in enumerate(values):
        total += v
        means.append(total / (i + 1))
    return means
