import pandas as pd

df = pd.read_csv("input.csv")
df.to_csv("output.csv")
