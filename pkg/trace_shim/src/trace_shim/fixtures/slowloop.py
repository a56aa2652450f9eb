import time

for _ in range(120):
    time.sleep(0.1)
print("done")
