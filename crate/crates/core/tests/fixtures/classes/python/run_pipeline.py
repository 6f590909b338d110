import subprocess

subprocess.run(['snakemake', '-j', '4'], check=True)
