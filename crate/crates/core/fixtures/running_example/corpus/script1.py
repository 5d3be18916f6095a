import pandas as pd

def massage_data(data):
    data = data.dropna()
    data = data.drop(columns=["id"])
    if len(data) > 100:
        data = data.head(100)
    return data

df = massage_data(pd.read_csv("data.csv"))
print(len(df))
