import sys

sys.stderr.write("ValueError: intentional failure\n")
sys.exit(1)
