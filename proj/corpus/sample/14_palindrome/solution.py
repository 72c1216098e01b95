def main_solution(text):
    lowered = text.lower()
    left = 0
    right = len(lowered) - 1
    while left < right:
        if lowered[left] != lowered[right]:
            return False
        left += 1
        right -= 1
    return True
