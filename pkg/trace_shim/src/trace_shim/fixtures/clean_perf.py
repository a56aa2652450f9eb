score = 8000 / 10000
print(f"Test accuracy: {score:.4f}")
