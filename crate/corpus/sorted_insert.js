function insertSorted(arr, value) {
  let i = arr.length - 1;
  arr[arr.length] = value;
  while (i >= 0 && arr[i] > value) {
    arr[i + 1] = arr[i];
    i--;
  }
  arr[i + 1] = value;
  return arr;
}
let nums = [1, 3, 5, 7, 9];
insertSorted(nums, 4);
